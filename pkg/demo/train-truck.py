import logging

from circsim import trainers
from circsim.envs import EnvConfig

logging.basicConfig(level=logging.INFO)

POLICY_FILE = "truck-policy.json"

common_logger = logging.getLogger()


def run(iterations=300, seed=7, workers=4, policy_file=POLICY_FILE):
    """
    Train a linear controller for the transport truck with ARS and CEM, and keep the better one.

    :param iterations: training iterations per trainer.
    :param seed: master seed of both runs.
    :param workers: rollout worker threads.
    :param policy_file: where the better policy is written.
    """
    env = EnvConfig("transport-truck")

    runs = [
        trainers.ars_train(env, trainers.ArsConfig(iterations=iterations, eval_every=50, seed=seed), workers),
        trainers.cem_train(env, trainers.CemConfig(iterations=iterations // 3, eval_every=25, seed=seed), workers),
    ]

    for r in runs:
        common_logger.info(f"{r.trainer}: r_s={r.report.r_s:.6g} r_e={r.report.r_e:.6g} zeta={r.report.zeta:.6g}")

    best = max(runs, key=lambda r: r.report.r_e)
    trainers.write_policy(policy_file, best.policy)
    common_logger.info(f"Kept the {best.trainer} policy in {policy_file}")

    # replay the kept policy on fresh episodes
    mean_return = trainers.evaluate(trainers.read_policy(policy_file), env, n_episodes=100, seed=seed + 1)
    common_logger.info(f"Mean return over 100 new episodes: {mean_return:.6g}")


if __name__ == "__main__":
    run()
