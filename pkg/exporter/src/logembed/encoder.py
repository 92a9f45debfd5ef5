"""Transformer encoder backends.

Two encoder identifiers are supported:

* a Hugging Face model id (default "bert-base-uncased"): the stock
  pre-trained encoder and its own WordPiece tokenizer;
* "local-random": a randomly initialized encoder with the standard
  base geometry (12 layers, 768 hidden dimensions), tokenized by a
  vocabulary file or corpus-derived vocabulary. Weights are seeded, so
  exports are reproducible. This backend exists for air-gapped use and
  for exercising the full export path without downloaded weights.

Both produce final-layer vectors that the exporter mean-pools over
subword positions, excluding boundary tokens.
"""

from __future__ import annotations

import numpy as np

from .wordpiece import CLS_TOKEN, SEP_TOKEN, WordPieceVocab


class EncoderUnavailable(Exception):
    """Requested encoder weights cannot be loaded."""


class LocalRandomEncoder:
    """Seeded randomly initialized base-geometry transformer encoder."""

    def __init__(self, vocab: WordPieceVocab, seed: int = 0, max_length: int = 128):
        import torch
        from transformers import BertConfig, BertModel

        self._torch = torch
        torch.manual_seed(seed)
        config = BertConfig(vocab_size=max(len(vocab), 2))
        self.model = BertModel(config)
        self.model.eval()
        self.vocab = vocab
        self.max_length = max_length
        self.hidden_size = config.hidden_size
        self.num_layers = config.num_hidden_layers
        self._cls_id = vocab.ids.get(CLS_TOKEN)
        self._sep_id = vocab.ids.get(SEP_TOKEN)

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        """Mean-pooled final-layer vector per text, boundary tokens and
        padding excluded from the pool. Empty token sequences pool over
        the boundary tokens instead of returning nothing."""
        torch = self._torch
        encoded = []
        for text in texts:
            ids = self.vocab.encode(text)
            body_limit = self.max_length - (self._cls_id is not None) - (self._sep_id is not None)
            ids = ids[:body_limit]
            wrapped = ids
            pooled_span = (0, len(ids))
            if self._cls_id is not None:
                wrapped = [self._cls_id] + wrapped
                pooled_span = (1, 1 + len(ids))
            if self._sep_id is not None:
                wrapped = wrapped + [self._sep_id]
            encoded.append((wrapped, pooled_span))
        max_len = max(len(ids) for ids, _ in encoded)
        batch = np.zeros((len(encoded), max_len), dtype=np.int64)
        mask = np.zeros((len(encoded), max_len), dtype=np.int64)
        for row, (ids, _) in enumerate(encoded):
            batch[row, : len(ids)] = ids
            mask[row, : len(ids)] = 1
        with torch.no_grad():
            output = self.model(
                input_ids=torch.from_numpy(batch),
                attention_mask=torch.from_numpy(mask),
            )
        hidden = output.last_hidden_state.numpy()
        vectors = np.zeros((len(encoded), self.hidden_size), dtype=np.float32)
        for row, (ids, (lo, hi)) in enumerate(encoded):
            span = hidden[row, lo:hi] if hi > lo else hidden[row, : len(ids)]
            vectors[row] = span.mean(axis=0, dtype=np.float64).astype(np.float32)
        return vectors


class PretrainedEncoder:
    """Hugging Face encoder + its stock tokenizer."""

    def __init__(self, model_id: str, max_length: int = 128):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer

            self._torch = torch
            self.tokenizer = AutoTokenizer.from_pretrained(model_id)
            self.model = AutoModel.from_pretrained(model_id)
        except Exception as exc:  # noqa: BLE001 - any load failure means unavailable
            raise EncoderUnavailable(f"cannot load encoder {model_id!r}: {exc}") from exc
        self.model.eval()
        self.max_length = max_length
        self.hidden_size = self.model.config.hidden_size
        self.num_layers = getattr(self.model.config, "num_hidden_layers", 0)

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        torch = self._torch
        batch = self.tokenizer(
            texts,
            padding=True,
            truncation=True,
            max_length=self.max_length,
            return_tensors="pt",
            return_special_tokens_mask=True,
        )
        special = batch.pop("special_tokens_mask")
        with torch.no_grad():
            output = self.model(**batch)
        hidden = output.last_hidden_state
        pool_mask = (batch["attention_mask"].bool() & ~special.bool()).unsqueeze(-1)
        counts = pool_mask.sum(dim=1).clamp(min=1)
        pooled = (hidden * pool_mask).sum(dim=1) / counts
        return pooled.numpy().astype(np.float32)


def build_encoder(
    encoder_id: str,
    vocab: WordPieceVocab | None = None,
    seed: int = 0,
    max_length: int = 128,
):
    if encoder_id == "local-random":
        if vocab is None:
            raise EncoderUnavailable("local-random encoder requires a vocabulary")
        return LocalRandomEncoder(vocab, seed=seed, max_length=max_length)
    return PretrainedEncoder(encoder_id, max_length=max_length)
