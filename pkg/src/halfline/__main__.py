import sys

from halfline.cli import main

sys.exit(main())
