# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

import sys

from bhvmc.cli import main

sys.exit(main())
