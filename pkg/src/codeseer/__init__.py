"""codeseer: next-token suggestion models for source code.

Pipeline: ingest a codebase -> standardize and tokenize -> build a
vocabulary -> extract fixed-length context windows -> train a model
(ngram | rnn | bigru) -> evaluate -> serve ranked suggestions over HTTP.
"""

__version__ = "0.1.0"

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "PAD"
UNK_TOKEN = "UNK"
