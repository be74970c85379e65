import hashlib
import json
import logging
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor, as_completed

import numpy as np
from pyhocon import ConfigFactory, ConfigTree, HOCONConverter
from pyhocon.exceptions import ConfigMissingException
from tqdm import tqdm

from vlpcal.errors import ConfigValidationError


def set_log_level(level):
    """Set the log-level of the root logger of the logging module.

    Args:
        level: can be an integer such as 30 (logging.WARN), or a string such as 'WARN'
    """
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())

    logger = logging.getLogger()  # gets root logger
    logger.setLevel(level)


def verboserate(iterable, desc=None, total=None, verbose=True):
    """Iterate with a progress bar on stderr (silent when verbose is False)."""
    return tqdm(iterable, desc=desc, total=total, file=sys.stderr, disable=not verbose, leave=False)


class cached_property(object):
    """Descriptor (non-data) for building an attribute on-demand on first use."""
    def __init__(self, factory):
        self._attr_name = factory.__name__
        self._factory = factory

    def __get__(self, instance, owner):
        if instance is None:
            return self
        attr = self._factory(instance)
        setattr(instance, self._attr_name, attr)
        return attr


class Config(object):
    """A wrapper around the pyhocon ConfigTree object.

    Allows you to access values in the ConfigTree as attributes. Also knows the
    dotted path it was taken from, so validation errors can name the full key.
    """
    def __init__(self, config_tree=None, prefix=''):
        if config_tree is None:
            config_tree = ConfigTree()
        self._config_tree = config_tree
        self._prefix = prefix

    def _full_key(self, key):
        return '{}.{}'.format(self._prefix, key) if self._prefix else key

    def _wrap(self, key, val):
        if isinstance(val, ConfigTree):
            return Config(val, self._full_key(key))
        return val

    def __getattr__(self, item):
        if item.startswith('_'):
            raise AttributeError(item)
        try:
            val = self._config_tree[item]
        except (KeyError, ConfigMissingException):
            raise ConfigValidationError(self._full_key(item), 'missing required key')
        return self._wrap(item, val)

    def __contains__(self, key):
        return self._config_tree.get(key, None) is not None

    def get(self, key, default=None):
        return self._wrap(key, self._config_tree.get(key, default))

    def require(self, key):
        """Like attribute access, but for dotted keys."""
        try:
            val = self._config_tree.get(key)
        except ConfigMissingException:
            raise ConfigValidationError(self._full_key(key), 'missing required key')
        if val is None:
            raise ConfigValidationError(self._full_key(key), 'missing required key')
        return self._wrap(key, val)

    def key(self, name):
        """Full dotted name of a key below this config."""
        return self._full_key(name)

    def put(self, key, value, append=False):
        """Put a value into the Config (dot separated)

        Args:
            key (str): key to use (dot separated). E.g. `a.b.c`
            value (object): value to put
        """
        self._config_tree.put(key, value, append=append)

    def __repr__(self):
        return self.to_str()

    def to_str(self):
        return HOCONConverter.convert(self._config_tree, 'hocon')

    def to_json(self):
        return json.loads(HOCONConverter.convert(self._config_tree, 'json'))

    def to_file(self, path):
        with open(path, 'w') as f:
            f.write(self.to_str())

    def digest(self):
        """Short content hash, recorded with every report for provenance."""
        return hashlib.sha1(self.to_str().encode('utf-8')).hexdigest()[:12]

    @classmethod
    def from_file(cls, path):
        config_tree = ConfigFactory.parse_file(path)
        return cls(config_tree)

    @classmethod
    def from_str(cls, text):
        return cls(ConfigFactory.parse_string(text))

    @classmethod
    def from_dict(cls, d):
        return Config(ConfigFactory.from_dict(d))

    @classmethod
    def merge(cls, config1, config2):
        assert isinstance(config1, Config)
        assert isinstance(config2, Config)
        return cls(ConfigTree.merge_configs(config1._config_tree, config2._config_tree))


def trial_rng(master_seed, stream, index=0):
    """Random generator for one trial.

    The generator depends only on (master_seed, stream, index), never on the order
    in which trials are executed.

    Args:
        master_seed (int): seed of the error model
        stream (int): separates independent uses of the same seed (see STREAM_* constants)
        index (int): trial index

    Returns:
        np.random.Generator
    """
    seq = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(stream), int(index)])
    return np.random.default_rng(seq)


class TrialFailure(object):
    """Represents the result of a failed trial."""

    def __init__(self, error):
        self._error_name = type(error).__name__
        self._msg = str(error)
        self._traceback = traceback.format_exc()

    @property
    def error_name(self):
        return self._error_name

    @property
    def message(self):
        return self._msg

    @property
    def traceback(self):
        return self._traceback

    def __repr__(self):
        return 'TrialFailure({}: {})'.format(self._error_name, self._msg)

    def __eq__(self, other):
        if not isinstance(other, TrialFailure):
            return False
        return (self.error_name, self.message) == (other.error_name, other.message)

    def __ne__(self, other):
        return not self.__eq__(other)


class OrderedExecutor(object):
    """Run a function over keyed inputs on a thread pool; hand results back in key order.

    A worker count of 1 runs everything inline.
    """
    def __init__(self, fxn, max_workers=1):
        self._fxn = fxn
        self._max_workers = max(1, int(max_workers))

    def map(self, items, desc=None, verbose=False):
        """Apply the function to every (key, x) pair.

        Args:
            items (list[(int, object)]): keyed inputs
            desc (str): progress bar label

        Returns:
            list: results sorted by key
        """
        items = list(items)
        if self._max_workers == 1:
            results = {key: self._fxn(x) for key, x in verboserate(items, desc=desc, verbose=verbose)}
        else:
            results = {}
            with ThreadPoolExecutor(self._max_workers) as executor:
                future_to_key = {executor.submit(self._fxn, x): key for key, x in items}
                for future in verboserate(as_completed(future_to_key), desc=desc, total=len(items),
                                          verbose=verbose):
                    results[future_to_key[future]] = future.result()
        return [results[key] for key in sorted(results)]
