"""Numerics and certification toolkit for Henon-type polynomial automorphism families."""

from .errors import (AmplifiedNoise, BitBudgetExceeded, DegenerateFit,
                     DegenerateParameter, EigenvalueOne, GloballyPeriodic,
                     IllConditioned, InjectivityViolation, MixedModeError,
                     NotPeriodic, NotReversible, Resonance,
                     ResolutionTooCoarse, SweepExhausted, ToolkitError)
from .family import (Dual, HenonFactor, HenonFamily, MarkedPoint, ParamPoly,
                     differential, family_from_json, family_to_json,
                     is_globally_periodic, load_family, marked_point_from_json,
                     marked_point_to_json, quadratic_family, save_family)
from .green import (EscapeData, GreenEnclosure, Membership, escape_data,
                    filled_julia_test, green, green_grid, green_max,
                    green_max_grid, render_green, write_pgm16)
from .periodic import (MultiplierPair, PeriodicRecord, PointClass, classify,
                       find_periodic, multipliers, write_periodic_csv)
from .measures import (GridMeasure, ProportionalityReport,
                       equidistribution_report, marked_green, measure_grid,
                       measure_from_potential, periodic_params,
                       proportionality_test, read_gmz,
                       symmetric_periodic_params, total_variation, write_gmz)
from .heights import (HarnessReport, HeightEstimate, RationalPoint,
                      canonical_height, height_sequence, inequality_harness,
                      naive_height, param_height)
from .quadratic import ConcentrationOctet, concentration_points, fixed_point_ys
from .ball import Ball

__version__ = "0.1.0"
