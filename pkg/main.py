import sys

from foresight.harness import main

if __name__ == "__main__":
    sys.exit(main())
