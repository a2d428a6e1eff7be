"""Visual storyteller: an encoder LSTM summarizes a 5-image sequence into a
context vector, and five position-specific decoder LSTMs each generate one
story segment, seeded with that context and their own image embedding.

The package also ships the surrounding pipeline: tokenization and skip-gram
embeddings, hand-derived gradients with finite-difference verification, an
Adam training loop with checkpointing, automatic metrics (BLEU, METEOR,
ROUGE-L, CIDEr), and an HTTP service for collecting human Likert ratings.
"""

__version__ = "0.1.0"
