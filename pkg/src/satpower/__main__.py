import sys

from satpower.cli import main

sys.exit(main())
