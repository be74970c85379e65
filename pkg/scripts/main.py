import sys

from vlpcal.cli import main

sys.exit(main())
