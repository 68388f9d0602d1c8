# Copyright 2026 The DPCL Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Differentially private continual learning on frozen embeddings."""

from dpcl._dpcl import (
    ConfigError,
    DivergenceError,
    Error,
    FormatError,
    IntegrityError,
    InvalidArgument,
    IoError,
    MappingError,
    NoClasses,
    PrivacyLedger,
    ScopeViolation,
    ShapeError,
    UndefinedMetric,
    Unsupported,
    calibrate_gaussian,
    calibrate_noise_multiplier,
    class_loss_curve,
    classical_gaussian_sigma,
    dp_sgd_epsilon,
    gaussian_delta,
    group_dp_delta,
    inspect_embeddings,
    laplace_tail,
    learned_release_delta,
    learned_release_probability,
    load_embeddings,
    run_attack,
    run_experiment,
    save_embeddings,
    synth_mixture,
)

__all__ = [name for name in dir() if not name.startswith("_")]
