# SPDX-License-Identifier: Apache-2.0
#
# ddchan - joint element/group sparse estimation of delay-Doppler channels
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ------------------------------------------------------------------------
"""Joint element/group sparse estimation of delay-Doppler channels."""

from ._ddchan import (  # noqa: F401
    DelayDopplerGrid,
    ExperimentConfig,
    PulseShape,
    Regions,
    Regularizer,
    admm_solve,
    build_leakage_matrix,
    build_pilot_matrix,
    build_sensing_matrix,
    combined_pulse,
    dirichlet_w,
    estimate,
    known_estimators,
    nmse,
    prepare_trial,
    prox_mcp,
    prox_nested,
    prox_scad,
    prox_soft,
    regions_from_csv,
    regions_to_csv,
    run_benchmark,
    spreading_from_csv,
    spreading_to_csv,
)

__version__ = "0.1.0"
