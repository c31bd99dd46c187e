"""Polymorphism metaquestions for finite relational structures."""

from .errors import BudgetExhausted, FormatError, InconclusiveFixing
from .structures import RelationalStructure, Relation, parse_structure, serialize_structure
from .conditions import MaltsevCondition, OperationTable, named_condition

__version__ = "0.1.0"
