import sys

from eosl.cli import main

sys.exit(main())
