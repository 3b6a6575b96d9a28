"""Scorer backends behind a single score_batch() surface.

Identifiers:
    mock[:salt]      deterministic text-hash scores in [0, 1]; no weights.
                     Pairs containing "__fail__" raise per item, for testing
                     the error path.
    constant:VALUE   the same score for every pair.
    hf:MODEL_ID      a transformers sequence-regression checkpoint. "pair"
                     rated side cross-encodes (source, target); "source" /
                     "target" feed one side. Requires the hf extra.
"""

from __future__ import annotations

from typing import Sequence

from .config import BridgeConfig

Pair = tuple[str, str]  # (source, target)

FAIL_MARKER = "__fail__"


class ScoreError(Exception):
    """Inference failed for one item; the server answers score=null."""


class MockModel:
    """Weight-free stand-in: stable fnv-style hash of the rated text mapped
    into [0, 1]. Batch-size independent by construction."""

    def __init__(self, config: BridgeConfig, salt: str = ""):
        self.config = config
        self.salt = salt

    def _text(self, pair: Pair) -> str:
        src, tgt = pair
        if self.config.rated_side == "source":
            return src
        if self.config.rated_side == "target":
            return tgt
        return src + "\x00" + tgt

    def score_batch(self, pairs: Sequence[Pair]) -> list[float]:
        scores = []
        for pair in pairs:
            if FAIL_MARKER in pair[0] or FAIL_MARKER in pair[1]:
                raise ScoreError(f"mock failure triggered by {FAIL_MARKER!r}")
            h = 2166136261
            for ch in self.salt + self._text(pair):
                h = ((h ^ ord(ch)) * 16777619) & 0xFFFFFFFF
            scores.append((h % 100_000) / 100_000)
        return scores


class ConstantModel:
    def __init__(self, config: BridgeConfig, value: float):
        self.value = value

    def score_batch(self, pairs: Sequence[Pair]) -> list[float]:
        return [self.value] * len(pairs)


class HFRegressionModel:
    """transformers checkpoint with a 1-dim regression/classification head.

    Raw head output is emitted as the score; pass sigmoid=True for logit
    heads whose documented range is [0, 1].
    """

    def __init__(self, config: BridgeConfig, model_id: str, sigmoid: bool = False):
        import torch
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        self.config = config
        self.sigmoid = sigmoid
        self.torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModelForSequenceClassification.from_pretrained(model_id)
        self.model.eval()
        self.model.to(config.device)

    def score_batch(self, pairs: Sequence[Pair]) -> list[float]:
        if not pairs:
            return []
        side = self.config.rated_side
        if side == "pair":
            encoded = self.tokenizer(
                [src for src, _ in pairs],
                [tgt for _, tgt in pairs],
                padding=True,
                truncation=True,
                return_tensors="pt",
            )
        else:
            texts = [src if side == "source" else tgt for src, tgt in pairs]
            encoded = self.tokenizer(
                texts, padding=True, truncation=True, return_tensors="pt"
            )
        encoded = {k: v.to(self.config.device) for k, v in encoded.items()}
        with self.torch.no_grad():
            logits = self.model(**encoded).logits
        values = logits.squeeze(-1)
        if self.sigmoid:
            values = self.torch.sigmoid(values)
        return [float(v) for v in values.cpu()]


def load_model(config: BridgeConfig, sigmoid: bool = False):
    """Instantiate the backend named by config.model. Raises on an unknown
    identifier or a failed checkpoint load; callers must do this before
    consuming any input."""
    name = config.model
    if name == "mock" or name.startswith("mock:"):
        _, _, salt = name.partition(":")
        return MockModel(config, salt)
    if name.startswith("constant:"):
        return ConstantModel(config, float(name.split(":", 1)[1]))
    if name.startswith("hf:"):
        return HFRegressionModel(config, name.split(":", 1)[1], sigmoid=sigmoid)
    raise ValueError(
        f"unknown model identifier {name!r} (expected mock[:salt], "
        f"constant:VALUE, or hf:MODEL_ID)"
    )
