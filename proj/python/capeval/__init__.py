# Copyright 2026 The capeval Authors.
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


"""Caption metric scoring and meta-evaluation."""

from ._core import (
    CoverageError,
    Error,
    NumericError,
    ParseError,
    ValidationError,
    bleu,
    cider,
    meteor_lite,
    pearson,
    rouge_l,
    run_cli,
    score_files,
    sent_bleu,
    stem,
    tokenize,
    williams_test,
    word_frequencies,
)

__all__ = [
    "CoverageError",
    "Error",
    "NumericError",
    "ParseError",
    "ValidationError",
    "bleu",
    "cider",
    "meteor_lite",
    "pearson",
    "rouge_l",
    "run_cli",
    "score_files",
    "sent_bleu",
    "stem",
    "tokenize",
    "williams_test",
    "word_frequencies",
]
