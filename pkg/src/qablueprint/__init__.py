"""Question-answer blueprints for planned summarization.

A blueprint is an ordered list of question-answer pairs that fixes what a
summary says and in which order.  The package derives blueprints from
(document, summary) pairs, serializes them into seq2seq training targets,
parses model decodes back, applies plan edits, and scores outputs.
"""

from .annotate import (
    AnnotateConfig,
    SortMode,
    align_to_sentences,
    annotate_example,
    coverage_select,
    overgenerate,
    rheme_select,
    roundtrip_filter,
    sort_blueprint,
)
from .candidates import AnswerCandidate, CandidateKind, extract_candidates, heuristic_backend
from .clients import Clients, MockNliClient, MockQaClient, MockQgClient, build_clients
from .config import RunConfig, load_config
from .control import ControlConfig, apply_plan_edit, drop_unanswerable, truncate_q1
from .core import (
    AnnotatedExample,
    Blueprint,
    CharSpan,
    Document,
    Proposition,
    QAPair,
    SentenceBlueprint,
    Source,
    Summary,
    normalize_answer,
    split_sentences,
    tokenize,
)
from .formats import (
    FormatConfig,
    PlanOrder,
    Variant,
    assemble_iterative,
    parse_e2e,
    parse_iterative_step,
    parse_multitask,
    serialize_e2e,
    serialize_iterative,
    serialize_multitask,
)
from .metrics import (
    FaithfulnessConfig,
    dataset_stats,
    evaluate_example,
    faithfulness,
    novel_ngrams,
    qa_based_score,
    rouge_lsum,
    token_f1,
)
from .propsplit import SplitConfig, split_propositions, split_summary
from .records import CorpusRecord

__version__ = "0.1.0"
