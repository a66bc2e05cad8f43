# Copyright 2026 The simtrace Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Physics traces, pattern detectors, reward programs and action search.

Scenes, traces, annotations and libraries are plain dicts here; they are
passed to the core as JSON.
"""

import json

from . import _core
from ._core import (
    SimtraceError,
    correlation,
    count_grade,
    length_penalty,
    nearby_grade,
    parse_detector,
    parse_reward,
    question_templates,
    symmetric_cross_entropy,
    template_ids,
    time_penalty,
)

__all__ = [
    "SimtraceError", "ablate", "annotate", "anneal", "answer", "build_scene", "check_placement", "correlation",
    "count_grade", "detector_length", "evaluate_reward", "length_penalty", "nearby_grade", "parse_detector",
    "parse_reward", "question_templates", "simulate", "success_test", "symmetric_cross_entropy", "template_ids",
    "time_penalty", "trace_distance",
]


def _dump(value):
    if value is None:
        return ""
    return value if isinstance(value, str) else json.dumps(value)


def build_scene(template_id, variant=0, params=None):
    return json.loads(_core.build_scene(template_id, variant, _dump(params)))


def simulate(scene, action, config=None):
    return json.loads(_core.simulate(_dump(scene), list(action), _dump(config)))


def check_placement(scene, action):
    return _core.check_placement(_dump(scene), list(action))


def detector_length(source):
    return _core.detector_length(source)


def annotate(trace, library=None, trace_ref=""):
    return json.loads(_core.annotate(_dump(trace), _dump(library), trace_ref))


def ablate(library, uid):
    return json.loads(_core.ablate(_dump(library), uid))


def trace_distance(a, b, samples=100):
    return _core.trace_distance(_dump(a), _dump(b), samples)


def evaluate_reward(program, ast, trace, binary=False, swap_after=False):
    return json.loads(_core.evaluate_reward(program, _dump(ast), _dump(trace), binary, swap_after))


def anneal(scene, reward, samples=250, seed=0, library=None, config=None):
    return json.loads(_core.anneal(_dump(scene), reward, samples, seed, _dump(library), _dump(config)))


def success_test(trace, target, tolerance=10.0):
    return _core.success_test(_dump(trace), target[0], target[1], tolerance)


def answer(template_id, args, trace, ast=None):
    return json.loads(_core.answer(template_id, _dump(args), _dump(trace), _dump(ast)))
