import sys

from paxos_mc.cli import main

sys.exit(main())
