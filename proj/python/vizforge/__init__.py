"""Python access to the vizforge core."""

import json
from fractions import Fraction

from . import _core
from ._core import ConfigError, Error, PreconditionError

__all__ = [
    "ConfigError",
    "Error",
    "PreconditionError",
    "bench_overall",
    "check_capture_manifest",
    "config_hash",
    "corpus_summary",
    "edit_final",
    "parse_units",
    "reward_mean",
    "run_pipeline",
]


def reward_mean(dims):
    return Fraction(*_core.reward_mean(dict(dims)))


def edit_final(dims):
    return _core.edit_final(dict(dims))


def bench_overall(s_exec, s_sim=None, s_align=None, s_faith=None):
    return Fraction(*_core.bench_overall(s_exec, s_sim, s_align, s_faith))


def parse_units(source, profile=None):
    return json.loads(_core.parse_units(source, json.dumps(profile) if profile else ""))


def check_capture_manifest(manifest, out_dir):
    return _core.check_capture_manifest(json.dumps(manifest), str(out_dir))


def config_hash(config):
    return _core.config_hash(json.dumps(config))


def corpus_summary(store_root):
    return json.loads(_core.corpus_summary(str(store_root)))


def run_pipeline(config_path, stages=(), stub_gateway=False, run_id=None, max_parallel=None):
    return json.loads(_core.run_pipeline(str(config_path), list(stages), stub_gateway, run_id, max_parallel))
