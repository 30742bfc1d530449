"""Command-line entry point: ``dogfight {train,evaluate,duel,export}``.

Every run writes into one output directory: the resolved configuration
(``config.txt``) plus the run's logs, checkpoints, trajectories or reports.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import ddqn
from .config import RunConfig
from .dt_policy import DtOptions
from .env import DogfightEnv, case_study_states
from .errors import CheckpointError, DogfightError

SCENARIOS = ("random", "case1", "case2")


def _parse_strategies(text):
    if text is None or str(text).lower() == "all":
        return list(range(1, 9))
    out = [int(t) for t in str(text).replace(",", " ").split()]
    for s in out:
        DtOptions.strategy(s)
    return out


def _parse_agent(text, allow_checkpoint):
    """``dt:N`` -> ("dt", N); anything else is a checkpoint path."""
    if text.startswith("dt:"):
        try:
            n = int(text[3:])
        except ValueError:
            raise ValueError(f"bad agent {text!r}; expected dt:N with N in 1..8") from None
        DtOptions.strategy(n)
        return "dt", n
    if not allow_checkpoint:
        raise ValueError(f"bad agent {text!r}; expected dt:N")
    return "net", text


def _load_net(path):
    if path is None:
        raise CheckpointError("a checkpoint is required (--checkpoint)")
    return ddqn.QNetwork.load(path)


def _resolve(args):
    overrides = {k: getattr(args, k, None) for k in ("seed", "steps", "episodes", "out")}
    if getattr(args, "strategy", None) is not None and args.command == "train":
        overrides["strategy"] = int(args.strategy)
    if args.config:
        cfg = RunConfig.from_file(args.config)
    else:
        cfg = RunConfig()
    cfg = cfg.with_overrides(**overrides)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.dump(out / "config.txt")
    return cfg, out


def cmd_train(cfg, out, args):
    def progress(step, stats):
        if step % 5000 == 0 or step == cfg.steps:
            print(f"step {step}: episodes {stats['episodes']} loss {stats['loss']:.4g} "
                  f"({stats['seconds']:.0f} s)", file=sys.stderr, flush=True)

    res = ddqn.train(cfg.episode_config(), cfg.train_config(), out_dir=out, progress=progress,
                     env_kwargs=cfg.env_kwargs())
    final = res.cumulative()[-1] if res.outcomes else (0, 0, 0, 0, 0)
    print(f"trained {cfg.steps} steps, {len(res.outcomes)} episodes; "
          f"wins {final[2]} losses {final[3]} ties {final[4]}; checkpoint {out / 'checkpoint_final.npz'}")
    return 0


def cmd_evaluate(cfg, out, args):
    net = _load_net(args.checkpoint)
    kwargs = cfg.env_kwargs()
    rows = []
    for s in _parse_strategies(args.strategy):
        win, loss, tie = ddqn.evaluate(net, DtOptions.strategy(s), cfg.episodes, seed=cfg.seed,
                                       env_config=cfg.episode_config(s), env_kwargs=kwargs)
        rows.append((s, win, loss, tie))
        print(f"strategy {s}: win {win:.2f}%  loss {loss:.2f}%  tie {tie:.2f}%", flush=True)
    ddqn.write_report(rows, out / "report.json")
    with open(out / "report.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("strategy", "win", "loss", "tie"))
        w.writerows(rows)
    return 0


def cmd_duel(cfg, out, args):
    scenario = args.scenario or "random"
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; expected one of {', '.join(SCENARIOS)}")
    blue_kind, blue = _parse_agent(args.blue or args.checkpoint or "dt:8", allow_checkpoint=True)
    _, red = _parse_agent(args.red, allow_checkpoint=False)
    net = _load_net(blue) if blue_kind == "net" else None

    env = DogfightEnv(cfg.episode_config(red), record=True, **cfg.env_kwargs())
    initial = None if scenario == "random" else case_study_states(scenario)
    obs = env.reset(seed=cfg.seed, initial=initial)
    decisions = []
    while not env.done:
        if net is not None:
            a = int(np.argmax(net.forward(obs)))
        else:
            a = env.dt_decision("blue", DtOptions.strategy(blue))
        res = env.step(a)
        obs = res.obs
        i = res.info
        decisions.append((i["step"], i["blue_action"], i["red_action"], i["d"], i["ata"],
                          i["aa"], i["bloods"][0], i["bloods"][1], res.reward))
    env.write_trajectory(out / "trajectory.csv")
    with open(out / "decisions.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("step", "blue_action", "red_action", "d", "ata", "aa", "blue_blood",
                    "red_blood", "reward"))
        w.writerows(decisions)
    summary = env.summary(cfg.seed)
    summary.update(scenario=scenario, blue=args.blue or args.checkpoint or "dt:8", red=args.red)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    print(f"{scenario}: {summary['outcome']} after {summary['steps']} s "
          f"(blue {summary['blue_blood']:.3f}, red {summary['red_blood']:.3f})")
    return 0


def cmd_export(cfg, out, args):
    """Checkpoint weights as plain JSON for use outside numpy."""
    net = _load_net(args.checkpoint)
    layers = [{"weight": net.params[2 * k].tolist(), "bias": net.params[2 * k + 1].tolist()}
              for k in range(net.n_layers)]
    doc = {"sizes": list(net.sizes), "activation": "relu", "layout": "y = x @ weight + bias",
           "layers": layers}
    with open(out / "network.json", "w") as fh:
        json.dump(doc, fh)
    print(f"wrote {out / 'network.json'}")
    return 0


COMMANDS = {"train": cmd_train, "evaluate": cmd_evaluate, "duel": cmd_duel, "export": cmd_export}


def build_parser():
    p = argparse.ArgumentParser(prog="dogfight", description="1v1 air-combat simulation and learning")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (("train", "train a maneuver-selection agent"),
                            ("evaluate", "win/loss/tie report against opponent strategies"),
                            ("duel", "fly one recorded engagement"),
                            ("export", "write checkpoint weights as JSON")):
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", help="flat key = value configuration file")
        s.add_argument("--seed", type=int)
        s.add_argument("--out", help="output directory")
        s.add_argument("--checkpoint", help="network checkpoint (.npz)")
        if name == "train":
            s.add_argument("--steps", type=int, help="decision steps (500000 for a full-length run)")
            s.add_argument("--strategy", type=int, help="opponent strategy 1..8")
        if name == "evaluate":
            s.add_argument("--episodes", type=int, help="episodes per strategy")
            s.add_argument("--strategy", help="comma-separated strategies or 'all'")
        if name == "duel":
            s.add_argument("--scenario", default="random", help="random, case1 or case2")
            s.add_argument("--blue", help="checkpoint path or dt:N")
            s.add_argument("--red", default="dt:8", help="dt:N")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg, out = _resolve(args)
        return COMMANDS[args.command](cfg, out, args)
    except (DogfightError, ValueError, OSError) as exc:
        print(f"dogfight {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
