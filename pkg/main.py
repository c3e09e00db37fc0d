import sys

from mtnet.cli.app import main

if __name__ == "__main__":
    # Run the command-line front end
    sys.exit(main())
