#!/usr/bin/python
import sys
print("a")
