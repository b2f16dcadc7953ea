import sys

from gasketdim.cli import main

sys.exit(main())
