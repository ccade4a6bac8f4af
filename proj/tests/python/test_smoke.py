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


import json
import math

import pytest

import capeval


def test_tokenize_and_stem():
    assert capeval.tokenize("A man, talking.") == ["a", "man", "talking"]
    assert capeval.stem("running") == "run"


def test_metric_hand_examples():
    assert capeval.rouge_l("the cat", ["the cat sat"]) == pytest.approx(0.7722, abs=1e-4)
    assert capeval.bleu("a b c d", ["a b c d"]) == pytest.approx(1.0)
    assert capeval.sent_bleu("x y z", ["a b c"]) > 0.0
    assert 0.0 < capeval.meteor_lite("dog runs", ["dog run"]) <= 1.0
    assert capeval.cider("a cat", ["a cat"], [["a cat"], ["a dog"]]) == pytest.approx(5.0)


def test_statistics():
    assert capeval.pearson([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)
    t, p, df = capeval.williams_test(0.3, 0.8, 0.5, 50)
    assert df == 47 and t > 0 and p < 0.05
    _, q, _ = capeval.williams_test(0.3, 0.5, 0.8, 50)
    assert p + q == 1.0


def test_errors_map_to_python_exceptions():
    with pytest.raises(capeval.NumericError):
        capeval.pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(capeval.Error):
        capeval.sent_bleu("a", [])


def test_word_frequencies():
    freq = capeval.word_frequencies([("a man talking", "a man dancing")])
    assert freq == [("man", 2), ("dancing", 1), ("talking", 1)]


def test_cli_round_trip(tmp_path):
    out = str(tmp_path)
    code, _, err = capeval.run_cli(["synth", "--videos", "20", "--out", out])
    assert code == 0, err
    rows = capeval.score_files(f"{out}/captions.jsonl", f"{out}/references.jsonl", ["bleu-4"])
    assert len(rows) == 20 * 8
    assert all(0.0 <= r["score"] <= 1.0 for r in rows)
    code, _, err = capeval.run_cli([
        "score", "--captions", f"{out}/captions.jsonl", "--references", f"{out}/references.jsonl",
        "--assessments", f"{out}/assessments.jsonl", "--metrics", "bleu-4", "--out", out,
    ])
    assert code == 0, err
    with open(f"{out}/scores.jsonl") as fh:
        written = [json.loads(line) for line in fh]
    by_key = {(r["video_id"], r["system_id"]): r["score"] for r in written}
    for r in rows:
        assert math.isclose(by_key[(r["video_id"], r["system_id"])], r["score"], abs_tol=1e-12)
    code, _, err = capeval.run_cli(["score", "--captions", f"{out}/nope.jsonl"])
    assert code != 0
