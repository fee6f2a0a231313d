# Copyright 2026 The shuttlesim Authors
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

"""Microscopic simulation of low-speed shuttles in mixed traffic."""

from ._core import (
    NetworkError,
    RoutingError,
    SimulationError,
    __version__,
    cli,
    fixture_names,
    fixture_network,
    geh,
    logit_probabilities,
    mape,
    run_scenario,
    scenario_ids,
)

__all__ = [
    "NetworkError",
    "RoutingError",
    "SimulationError",
    "__version__",
    "cli",
    "fixture_names",
    "fixture_network",
    "geh",
    "logit_probabilities",
    "mape",
    "run_scenario",
    "scenario_ids",
]
