# ElasticSearch dynamic scripting proof-of-concept (fixture skeleton).
# Sends a _search request with a script payload; body removed in this asset.

import json


def build_query():
    return json.dumps({"size": 1, "query": {"match_all": {}}})


print("fixture script: no exploit body")
