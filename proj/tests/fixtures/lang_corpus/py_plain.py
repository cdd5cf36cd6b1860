import os
import socket

def main():
    pass
