"""Single-track railway dispatching compiled to QUBO."""

from .model import (
    Block,
    Circulation,
    DispatchProblem,
    Network,
    Timetable,
    Train,
    dump_problem,
    load_problem,
    make_train,
    problem_from_dict,
    problem_to_dict,
    propagate_primary,
)
from .oracle import defect_spectrum, exact_onehot_search, onehot_branch_and_bound
from .qubo import (
    CONDITION_KINDS,
    OneHotViolation,
    VariableMap,
    all_condition_pairs,
    assemble_qubo,
    condition_terms,
    decode_schedule,
    delay_sets,
    encode_schedule,
    enumerate_variables,
    objective_terms,
    onehot_penalty_terms,
)
from .shapes import line191_problem, line216_problem, toy_problem
from .validate import occupation_intervals, validate_schedule

__all__ = [
    "Block", "Circulation", "DispatchProblem", "Network", "Timetable", "Train",
    "dump_problem", "load_problem", "make_train", "problem_from_dict", "problem_to_dict",
    "propagate_primary", "defect_spectrum", "exact_onehot_search", "onehot_branch_and_bound",
    "CONDITION_KINDS", "OneHotViolation", "VariableMap", "all_condition_pairs", "assemble_qubo",
    "condition_terms", "decode_schedule", "delay_sets", "encode_schedule", "enumerate_variables",
    "objective_terms", "onehot_penalty_terms", "line191_problem", "line216_problem",
    "toy_problem", "occupation_intervals", "validate_schedule",
]
