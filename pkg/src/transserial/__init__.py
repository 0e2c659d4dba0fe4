"""Exact computer algebra for grid-based transseries with certificates."""

from .rationals import Q, Const
from .monomial import (
    Monomial,
    ONE,
    X,
    ell,
    exp_tower,
    make_mono,
    mono_cmp,
    mono_inv,
    mono_log,
    mono_mul,
    mono_pow,
    mono_shift,
    mono_text,
    LT,
    EQ,
    GT,
)
from .grid import (
    Grid,
    Member,
    NotMember,
    RatioSet,
    UnknownMembership,
    dominates,
    embed_shifted_monoid,
    grid_member,
    grid_product,
    grid_union,
    min_elements,
    monoid_member,
    subgrid_witness,
)
from .series import (
    CompareReport,
    Decomposition,
    Transseries,
    Witness,
    dump_text,
    series_text,
    ts_add,
    ts_compare,
    ts_const,
    ts_decompose,
    ts_exp,
    ts_from_terms,
    ts_laurent,
    ts_log,
    ts_mono,
    ts_mul,
    ts_neg,
    ts_power,
    ts_x,
    validate_prefix,
    zero,
)
from .certificates import Checked, Failed, Proven, Unknown
from . import errors

__all__ = [name for name in dir() if not name.startswith("_")]
