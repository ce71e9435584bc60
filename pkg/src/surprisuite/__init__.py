"""surprisuite: region-based surprisal evaluation for incremental LMs."""

__version__ = "0.1.0"

from .errors import (ModelFileError, ParseError, ProtocolViolation,
                     SurprisuiteError, TrainingError, TransportError,
                     UnknownConditionError, ValidationError)
from .metrics import (Contrast, MetricResult, collect_region_sums,
                      contrast_from_spec, eval_contrast, licensing_interaction,
                      ordering_effect, suite_contrasts,
                      validate_measurement_regions, wh_effect_minus_gap,
                      wh_effect_plus_gap)
from .ngram import NGramBackend, NGramModel, train, train_file
from .oracle import (ConstantBackend, MockOracleBackend, OracleRule,
                     mock_backend_from_rules, oracle_score)
from .scoring import (Backend, BackendInfo, RegionScores, SentenceScore,
                      TokenScore, align, handshake, merge_region_scores, score,
                      validate_sentence_score)
from .stats import (ConditionMatrix, IntervalEstimate, PermutationResult,
                    ReportRow, adjust_within_item, paired_permutation,
                    summarize, t_quantile, within_item_ci)
from .suite import (Condition, ConditionLabel, Factor, Item, RegionSpan,
                    RegionedSentence, TestSuite, load_suite, parse_suite,
                    render_condition, render_sentence, save_suite,
                    serialize_suite, suite_from_dict, suite_to_dict)
from .templates import (ExpansionPlan, Slot, Template, count_expansions,
                        expand, joint_space_size, load_template,
                        parse_template, template_from_dict)

__all__ = [name for name in dir() if not name.startswith("_")]
