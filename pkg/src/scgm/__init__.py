"""Marginal parameterizations, graphical independence models, and fitting
for contingency tables over ordered categorical variables."""

__version__ = "0.1.0"

from .errors import (
    AllocationCoverageError,
    AllocationOrderError,
    DuplicateCellError,
    GraphFormatError,
    InfeasibleSystemError,
    ScgmError,
    StatementError,
    TableFormatError,
    UnsupportedCodingError,
    ZeroCellError,
    ZeroMassSliceError,
)
from .tables import (
    CODINGS,
    ContingencyTable,
    ProbabilityVector,
    VariableSpec,
    dump_table,
    load_table,
    marginalize,
    probability_vector,
    slice_conditional,
    to_probabilities,
)
from .params import (
    EffectAllocation,
    ParamIndex,
    ParamVector,
    allocate_effects,
    baseline_from_local,
    conditional_param,
    param_index,
    param_value,
    param_vector,
)
from .constraints import (
    CellListContext,
    ConstraintSystem,
    PatternContext,
    Row,
    Statement,
    Term,
    ThresholdContext,
    constraints_baseline,
    constraints_conditional,
    constraints_local,
    context_cell_rows,
    evaluate_row,
    evaluate_system,
    expected_constraint_count,
    generate_constraints,
    interaction_sets,
    parse_statement,
    render_statement,
    statement_from_json,
    statement_kind,
    statement_to_json,
    system_to_json,
    threshold_rows,
)
from .graphs import (
    StratifiedChainGraph,
    Stratum,
    chain_components,
    graph_from_json,
    graph_parents,
    graph_to_json,
    load_graph,
    marginal_sets,
    markov_type_iv,
    neighbourhood,
    non_descendants,
    parents_of_component,
    parse_graph,
    render_graph,
    statements_text,
    stratified_markov,
    validate,
)
from .regression import (
    ComponentRegression,
    RegressionCoefficient,
    RegressionSystem,
    conditional_logit,
    conditional_table,
    graph_allocation,
    mixed_param_indices,
    params_from_regression,
    regression_from_params,
    regression_report,
    report_csv_rows,
    scgm_constraint_system,
)
from .fitting import (
    AIC_FORMULA,
    BIC_FORMULA,
    CompiledSystem,
    FitOptions,
    FitResult,
    SearchTrace,
    chisq_sf,
    compile_system,
    fit_constrained,
    fit_to_json,
    information_criteria,
    model_search,
    trace_to_json,
)

__all__ = [
    "__version__",
    "AllocationCoverageError",
    "AllocationOrderError",
    "DuplicateCellError",
    "GraphFormatError",
    "InfeasibleSystemError",
    "ScgmError",
    "StatementError",
    "TableFormatError",
    "UnsupportedCodingError",
    "ZeroCellError",
    "ZeroMassSliceError",
    "CODINGS",
    "ContingencyTable",
    "ProbabilityVector",
    "VariableSpec",
    "dump_table",
    "load_table",
    "marginalize",
    "probability_vector",
    "slice_conditional",
    "to_probabilities",
    "EffectAllocation",
    "ParamIndex",
    "ParamVector",
    "allocate_effects",
    "baseline_from_local",
    "conditional_param",
    "param_index",
    "param_value",
    "param_vector",
    "CellListContext",
    "ConstraintSystem",
    "PatternContext",
    "Row",
    "Statement",
    "Term",
    "ThresholdContext",
    "constraints_baseline",
    "constraints_conditional",
    "constraints_local",
    "context_cell_rows",
    "evaluate_row",
    "evaluate_system",
    "expected_constraint_count",
    "generate_constraints",
    "interaction_sets",
    "parse_statement",
    "render_statement",
    "statement_from_json",
    "statement_kind",
    "statement_to_json",
    "system_to_json",
    "threshold_rows",
    "StratifiedChainGraph",
    "Stratum",
    "chain_components",
    "graph_from_json",
    "graph_parents",
    "graph_to_json",
    "load_graph",
    "marginal_sets",
    "markov_type_iv",
    "neighbourhood",
    "non_descendants",
    "parents_of_component",
    "parse_graph",
    "render_graph",
    "statements_text",
    "stratified_markov",
    "validate",
    "ComponentRegression",
    "RegressionCoefficient",
    "RegressionSystem",
    "conditional_logit",
    "conditional_table",
    "graph_allocation",
    "mixed_param_indices",
    "params_from_regression",
    "regression_from_params",
    "regression_report",
    "report_csv_rows",
    "scgm_constraint_system",
    "AIC_FORMULA",
    "BIC_FORMULA",
    "CompiledSystem",
    "FitOptions",
    "FitResult",
    "SearchTrace",
    "chisq_sf",
    "compile_system",
    "fit_constrained",
    "fit_to_json",
    "information_criteria",
    "model_search",
    "trace_to_json",
]
