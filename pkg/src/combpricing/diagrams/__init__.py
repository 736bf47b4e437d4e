"""Value-function, selection and decision diagrams."""

from .decision import (dd_add_path, dd_add_solution, dd_full, dd_init, dd_model, dd_path_for_solution, dd_transitions,
                       dd_valid_transition, make_grouping, singleton_grouping)
from .diagram import (DECISION, SELECTION, VF, Arc, Diagram, Node, NoTerminalPath, arc_length,
                      diagram_longest_path, export_dot, item_lengths, vf_diagram)
from .selection import sd_add_solution, sd_full, sd_init
