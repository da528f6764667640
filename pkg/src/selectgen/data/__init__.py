from .tokenizer import tokenize, detokenize
from .vocab import Vocabulary, PAD_ID, BOS_ID, EOS_ID, UNK_ID
from .grammar import GrammarSpec, default_grammar
from .synth import Example, Record, generate_corpus
from .corpus import save_corpus, load_corpus

__all__ = [
    "tokenize", "detokenize",
    "Vocabulary", "PAD_ID", "BOS_ID", "EOS_ID", "UNK_ID",
    "GrammarSpec", "default_grammar",
    "Example", "Record", "generate_corpus",
    "save_corpus", "load_corpus",
]
