#!/usr/bin/env python3
# vsftpd 2.3.4 backdoor interaction helper (fixture skeleton).
# Connection handling removed in this test asset.

from telnetlib import Telnet  # noqa: F401


def main():
    print("fixture script: no exploit body")


if __name__ == "__main__":
    main()
