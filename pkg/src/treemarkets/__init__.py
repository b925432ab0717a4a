"""Market models on finite scenario trees.

Scenario trees and adapted strategies, market integrands with frictions,
integrand representation, recession models, no-arbitrage checks,
superhedging, utility maximisation and polyhedral cone orders.
"""

from .arbitrage import (ARBITRAGE, NA_CERTIFIED, NA_UP_TO_SEARCH, NaVerdict, SphereConfig, check_na,
                        domination_check, frictionless_dominator, na_check_homogeneous, na_check_linear,
                        viability_probe)
from .cones import (ConeSelection, RandomCone, affine_ball_radius, castaing, cone_leq, cone_order,
                    gram_reconstruct, interior_ball_radius, orthant, ri_selection, scalarize,
                    vector_na_check, vector_superhedge_feasible)
from .errors import *  # noqa: F401,F403
from .models import (AdditiveModel, BoxConstraint, FixedCost, FunctionModel, KabanovModel, LimitOrderBookModel,
                     MarketIntegrand, ProportionalCost, StrategyFunctional, TwoStateModel, VectorIntegrand,
                     additive_costs, consumption_model, frictionless, kabanov_model, limit_order_book,
                     two_state_model)
from .recession import cross_validate_recession, recession_analytic, recession_numeric
from .representation import (build_grid, check_axioms, check_usc, envelopes, p_qr, reconstruct_integrand)
from .superhedging import (closedness_probe, strategy_bounds, superhedge_feasible, superhedge_price)
from .tree import (AdaptedStrategy, ScenarioTree, build_tree, enumerate_adapted_grid, ft_sets, path_tree,
                   random_tree, restrict_to_path, uniform_tree)
from .utility import (brute_force_value, check_utility_axioms, maximize_utility, parse_utility)

__version__ = "0.1.0"
