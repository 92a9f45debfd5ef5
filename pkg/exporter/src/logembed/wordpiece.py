"""Greedy longest-match subword tokenization for the encoder input."""

from __future__ import annotations

from pathlib import Path

PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
SPECIAL_TOKENS = (PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN)

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


class WordPieceVocab:
    """Token list with id lookup; continuation pieces carry "##"."""

    def __init__(self, tokens: list[str]):
        if len(set(tokens)) != len(tokens):
            raise ValueError("vocabulary entries must be unique")
        self.tokens = list(tokens)
        self.ids = {token: i for i, token in enumerate(tokens)}
        if UNK_TOKEN not in self.ids:
            raise ValueError(f"vocabulary must contain {UNK_TOKEN}")

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_file(cls, path: str | Path) -> "WordPieceVocab":
        with open(path, encoding="utf-8") as handle:
            tokens = [line.rstrip("\n") for line in handle if line.rstrip("\n")]
        return cls(tokens)

    @classmethod
    def from_texts(cls, texts: list[str], max_words: int = 20_000) -> "WordPieceVocab":
        """Derive a vocabulary from a corpus: specials, single letters and
        their continuations (so every word tokenizes without unknowns),
        then the most frequent whole words."""
        counts: dict[str, int] = {}
        for text in texts:
            for word in text.split():
                counts[word] = counts.get(word, 0) + 1
        frequent = sorted(counts, key=lambda w: (-counts[w], w))[:max_words]
        tokens = list(SPECIAL_TOKENS)
        tokens.extend(_LETTERS)
        tokens.extend("##" + c for c in _LETTERS)
        tokens.extend(w for w in frequent if w not in set(tokens))
        return cls(tokens)

    def tokenize(self, text: str) -> list[str]:
        """Per word: greedy longest prefix in the vocabulary, remainder
        matched with "##"-prefixed entries; unmatched words become UNK."""
        pieces: list[str] = []
        for word in text.split():
            word_pieces: list[str] = []
            start = 0
            while start < len(word):
                end = len(word)
                match = None
                while start < end:
                    candidate = word[start:end]
                    if start > 0:
                        candidate = "##" + candidate
                    if candidate in self.ids:
                        match = candidate
                        break
                    end -= 1
                if match is None:
                    word_pieces = [UNK_TOKEN]
                    break
                word_pieces.append(match)
                start = end
            pieces.extend(word_pieces)
        return pieces

    def encode(self, text: str) -> list[int]:
        return [self.ids[piece] for piece in self.tokenize(text)]
