from .matching import SegmentMatch, adjacency_match, cdm
from .page import MarkdownParts, PageScores, evaluate_page, parse_markdown, pipe_table_to_html
from .report import METRICS, EvalReport, ScoreRangeError, aggregate, overall_score
from .ted import PreparedTree, chart_score, teds, teds_trees, tree_edit_distance
from .text import LATEX_TO_UNICODE, latex_to_unicode, levenshtein, ned, normalize_text, sequence_levenshtein
