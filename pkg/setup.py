#!/usr/bin/env python
from distutils.core import setup, Command


class Test(Command):
    user_options = []

    def initialize_options(self):
        pass

    def finalize_options(self):
        pass

    def run(self):
        import subprocess
        errno = subprocess.call(['py.test', '-v', 'vlpcal'])
        raise SystemExit(errno)


setup(name='vlpcal',
      version='1.0',
      packages=['vlpcal', 'dependency'],
      description='Image-sensor visible light positioning with rotation and dispersion calibration.',
      scripts=['scripts/vlpcal'],
      cmdclass={'test': Test},
)
