import sys

from fusedkernel.bench.cli import main

sys.exit(main())
