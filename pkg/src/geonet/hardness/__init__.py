"""Reduction gadgets and the path pivot protocol."""
from .gadgets import (
    CharVector,
    GadgetInstance,
    GadgetKind,
    GadgetReport,
    gen_closest_gadget,
    gen_diameter_gadget,
    gen_hull_gadget,
    generate,
    verify_gadget,
)
from .pivot import (
    PivotOutcome,
    TrivialDisjointness,
    TwoPartyProtocol,
    run_path_pivot_protocol,
    run_two_party,
)

__all__ = [
    "CharVector", "GadgetInstance", "GadgetKind", "GadgetReport", "gen_closest_gadget",
    "gen_diameter_gadget", "gen_hull_gadget", "generate", "verify_gadget", "PivotOutcome",
    "TrivialDisjointness", "TwoPartyProtocol", "run_path_pivot_protocol", "run_two_party",
]
