# -------------------------------------------------------------------------
# Copyright (c) the bhvmc authors. All rights reserved.
# Licensed under the Apache License, Version 2.0. See
# License.txt in the project root for license
# information.
# ---------------

from setuptools import setup, find_packages

setup(name='bhvmc',
      version='0.3.0',
      license='LICENSE.txt',
      description='Backflow-Jastrow variational Monte Carlo for the '
                  'Bose-Hubbard model',
      packages=find_packages(exclude=['tests']),
      long_description=open('README.md').read(),
      long_description_content_type='text/markdown',
      install_requires=['numpy>=1.22', 'scipy>=1.12'],
      entry_points={'console_scripts': ['bhvmc=bhvmc.cli:main']},
      python_requires='>=3.8',
      zip_safe=False)
