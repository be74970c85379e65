import os

from vlpcal.io import makedirs


class _DataDirectory(object):
    """Specifies the structure of the data directory.

    The root is the environment variable VLPCAL_DIR, or ~/.vlpcal if it is unset. It is read on
    every access, and a directory is only created when its path is asked for.
    """
    env_var = 'VLPCAL_DIR'
    default_root = os.path.join('~', '.vlpcal')

    @property
    def root(self):
        return os.path.expanduser(os.environ.get(self.env_var, self.default_root))

    def _sub_dir(self, name):
        path = os.path.join(self.root, name)
        makedirs(path)
        return path

    @property
    def experiments(self):
        """Directory containing numbered experiment results"""
        return self._sub_dir('experiments')


DataDirectory = _DataDirectory()
