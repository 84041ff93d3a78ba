import logging

import numpy as np
from scipy.integrate import trapezoid

from circsim.circularity import Ledger, SolidScenario, lambda_series, lambda_solid_scenario, solid_scenario_events
from circsim.network import builtin_network

logging.basicConfig(level=logging.INFO)

common_logger = logging.getLogger()

SORTING_SUCCESS = (0.0, 25.0, 50.0, 75.0, 100.0)


def run(m=100.0, sorting_time=5.0, second_life=40.0):
    """
    Sweep the sorting success of the solids network and compare the closed form with a ledger replay.

    :param m: extracted mass (kg).
    :param sorting_time: time spent in the sorter (s).
    :param second_life: time the recycled share spends in its second use (s).
    """
    tmn = builtin_network("n_s")

    for s in SORTING_SUCCESS:
        sc = SolidScenario(m=m, s=s, T_s=sorting_time, t_extract_out=1.0, first_use_duration=10.0,
                           tau_transport_unsorted=2.0, tau_second_life=second_life)
        ledger = Ledger(tmn, solid_scenario_events(sc))

        times = np.linspace(sc.t_extract_out, 1.5 * sc.t_incinerator_in_recycled, 501)
        closed = lambda_series(lambda t: lambda_solid_scenario(sc, t), times)
        replay = lambda_series(ledger.lambda_at, times)

        # time-averaged circularity over the window, larger is better
        mean_lambda = float(trapezoid(closed, times) / (times[-1] - times[0]))
        common_logger.info(
            f"s={s:5.1f}%  mean lambda={mean_lambda:9.3f}  life extension={sc.life_extension:5.1f} s  "
            f"ledger agrees: {bool(np.array_equal(closed, replay))}"
        )


if __name__ == "__main__":
    run()
