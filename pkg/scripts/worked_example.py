"""Score the three-segment worked-example schedule on the strong-shear vs light-constant groups."""

from causalwind.config import EXAMPLE_SCHEDULE
from causalwind.curiosity import evaluate_schedule
from causalwind.experiments import EXAMPLE_SCENARIO, build_environments


def main():
    g1, g2 = build_environments(EXAMPLE_SCENARIO)
    rec = evaluate_schedule(EXAMPLE_SCHEDULE, g1, g2)
    for t, f in zip(EXAMPLE_SCHEDULE.times, EXAMPLE_SCHEDULE.to_dict()["forces"]):
        print(f"t={t:5.1f} s  thrust={f}")
    print("group 1 (strong shear):  ", rec.assignments_group1)
    print("group 2 (light constant):", rec.assignments_group2)
    print(f"correct={rec.correct}  silhouette={rec.silhouette_raw:.4f}  score={rec.score:.2f}")


if __name__ == "__main__":
    main()
