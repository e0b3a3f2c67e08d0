import sys

from seedcodec.cli import main

sys.exit(main())
