"""inksig: character-level online writer identification.

Pen trajectories become multi-channel feature maps whose channels hold
truncated path-signature values painted along the trace; stroke-dropout
augmentation multiplies the training data; a small from-scratch CNN
learns to identify the writer; the evaluation protocol scores top-k
ranks with multi-variant test averaging and sequential grouping.
"""

from .backend import BACKEND
from .cnn import (DESK_CONV_WIDTHS, DESK_FC_UNITS, PAPER_CONV_WIDTHS,
                  PAPER_FC_UNITS, LayerSpec, Network, TrainConfig, load_model,
                  save_model, sgd_step, train)
from .dataset import (Corpus, SplitSpec, load_corpus_jsonl, make_split,
                      parse_jsonl, parse_pot, save_corpus_jsonl, stroke_stats,
                      synth_corpus, write_jsonl, write_pot)
from .dropstroke import (DropPolicy, balanced_training_stream, drop_count,
                         enumerate_variants, sample_variant, variant_count)
from .errors import ConfigError, InkError, InvalidInputError, ParseError
from .evaluation import (averaged_predict, combine_predictions, group_eval,
                         group_rank_table, predict_corpus, topk_accuracy)
from .pipeline import TrainSettings, character_features, train_writer_model
from .rasterize import FeatureTensor, equalize, export_images, render
from .signature import (SignatureVector, chen_concat, identity_signature,
                        path_signature, segment_signature, sig_dim,
                        windowed_signature_array, windowed_signatures,
                        word_index)
from .trajectory import (DistortLimits, InkCharacter, affine_distort,
                         affine_transform, normalize, resample)

__version__ = "0.1.0"
