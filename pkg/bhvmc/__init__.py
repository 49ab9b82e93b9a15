# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

import logging

__all__ = ["base", "api", "cli"]
__version__ = "0.3.0"
logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG)
logger.addHandler(logging.NullHandler())
formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - '
                              '%(message)s')
screenformater = logging.Formatter('%(levelname)s - %(message)s')
