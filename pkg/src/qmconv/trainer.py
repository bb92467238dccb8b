"""End-to-end training, evaluation, resource reporting, and gradient checks.

Reproducibility contract: one PCG64 stream seeded from ``RunConfig.seed``
initializes the model and then drives the per-epoch shuffles, and batch
gradients are reduced in a fixed order, so a fixed (seed, threads=1,
deterministic) run writes byte-identical metrics CSVs. In deterministic
mode the CSV ``seconds`` column records 0.0 (wall time is not a
deterministic quantity); timing still goes to stdout.
"""
from __future__ import annotations

import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from qmconv import datasets, engine, gradients, qconv
from qmconv.circuits import circuit_depth
from qmconv.head import AdamState, adam_step
from qmconv.model import Model, batch_eval, build_model, load_model, save_model

DATASET_NAMES = ("noisy-colors", "noisy-shapes", "high-channel", "cifar")
DATASET_CHANNELS = {"noisy-colors": 3, "noisy-shapes": 3, "high-channel": 12, "cifar": 3}
CSV_HEADER = "epoch,train_loss,train_acc,test_loss,test_acc,seconds"


@dataclass
class RunConfig:
    method: str = "co"
    ansatz: str = "u2"
    dataset: str = "high-channel"
    classes: int = 2              # cifar tasks only
    filter: int = 2
    stride: int = 1
    registers: int = 3
    ancillas: int = 3
    hidden: int = 128
    batch: int = 32
    epochs: int = 20
    lr: float | None = None      # None -> 0.001, or 0.01 on high-channel
    seed: int = 1
    data_seed: int = 1
    threads: int = 1
    deterministic: bool = False
    out: str = "runs/latest"
    data_dir: str | None = None  # None -> $QMC_DATA_DIR or ./data

    def conv_config(self) -> qconv.ConvConfig:
        return qconv.ConvConfig(
            method=self.method, filter_size=self.filter, stride=self.stride,
            registers=self.registers, ancillas=self.ancillas, ansatz=self.ansatz,
        )

    def effective_lr(self) -> float:
        if self.lr is not None:
            return self.lr
        return 0.01 if self.dataset == "high-channel" else 0.001

    def resolved_data_dir(self) -> Path:
        if self.data_dir is not None:
            return Path(self.data_dir)
        return Path(os.environ.get("QMC_DATA_DIR", "data"))

    def validate(self) -> None:
        self.conv_config()  # raises on bad method/ansatz/filter/stride/R/A
        if self.dataset not in DATASET_NAMES:
            raise ValueError(f"dataset must be one of {DATASET_NAMES}")
        if self.dataset == "cifar" and not 2 <= self.classes <= 10:
            raise ValueError("cifar tasks cover 2 to 10 classes")
        if self.hidden < 1:
            raise ValueError("hidden width must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch < 1:
            raise ValueError("batch size must be >= 1")
        if self.effective_lr() <= 0:
            raise ValueError("learning rate must be positive")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_acc: float
    test_loss: float
    test_acc: float
    seconds: float

    def csv_row(self) -> str:
        return (f"{self.epoch},{self.train_loss:.10g},{self.train_acc:.10g},"
                f"{self.test_loss:.10g},{self.test_acc:.10g},{self.seconds:.3f}")


@dataclass
class TrainResult:
    metrics: list[EpochMetrics]
    model: Model
    model_path: Path
    csv_path: Path


_GENERATORS = {
    "noisy-colors": datasets.gen_noisy_colors,
    "noisy-shapes": datasets.gen_noisy_shapes,
    "high-channel": datasets.gen_high_channel,
}


def resolve_dataset(config: RunConfig):
    """Load dataset files when present, else generate synthetics in memory.

    CIFAR always requires the binary batch files on disk.
    """
    ddir = config.resolved_data_dir()
    if config.dataset == "cifar":
        classes = datasets.cifar_task_classes(config.classes)
        for candidate in (ddir / "cifar-10-batches-bin", ddir):
            if (candidate / "data_batch_1.bin").exists():
                return datasets.load_cifar10(candidate, classes,
                                             seed=config.data_seed)
        raise FileNotFoundError(
            f"CIFAR-10 binary batches not found under {ddir}; set QMC_DATA_DIR "
            "or --data-dir to a directory holding cifar-10-batches-bin/"
        )
    train_path = ddir / f"{config.dataset}.train.qmc"
    test_path = ddir / f"{config.dataset}.test.qmc"
    if train_path.exists() and test_path.exists():
        return (datasets.load_dataset(train_path, "train"),
                datasets.load_dataset(test_path, "test"))
    return _GENERATORS[config.dataset](config.data_seed)


def generate_data(config: RunConfig, out_dir=None) -> tuple[Path, Path]:
    """Write the configured dataset as container files."""
    out = Path(out_dir) if out_dir is not None else config.resolved_data_dir()
    out.mkdir(parents=True, exist_ok=True)
    if config.dataset == "cifar":
        train, test = resolve_dataset(config)
        stem = f"cifar{config.classes}"
    else:
        train, test = _GENERATORS[config.dataset](config.data_seed)
        stem = config.dataset
    train_path = out / f"{stem}.train.qmc"
    test_path = out / f"{stem}.test.qmc"
    datasets.save_dataset(train, train_path)
    datasets.save_dataset(test, test_path)
    return train_path, test_path


def build_run_model(config: RunConfig, train_ds, rng=None) -> Model:
    wev_init = "xavier" if config.dataset == "high-channel" else "normal"
    seed = rng if rng is not None else np.random.default_rng(config.seed)
    model = build_model(config.conv_config(), train_ds.image_shape,
                        len(train_ds.class_names), config.hidden,
                        seed=seed, wev_init=wev_init)
    model.class_names = list(train_ds.class_names)
    return model


def train(config: RunConfig, log=print) -> TrainResult:
    config.validate()
    threads = engine.set_threads(1 if config.deterministic else config.threads)
    train_ds, test_ds = resolve_dataset(config)
    rng = np.random.default_rng(config.seed)
    model = build_run_model(config, train_ds, rng)
    adam = AdamState(lr=config.effective_lr())
    tensors = model.param_tensors()

    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "metrics.csv"
    model_path = out_dir / "model.qmm"
    n_train = len(train_ds)
    log(f"training {config.method}/{config.ansatz} on {config.dataset}: "
        f"{n_train} train / {len(test_ds)} test, {model.num_qubits} qubits, "
        f"{model.qparams.size} quantum params, lr {adam.lr}, {threads} thread(s)")

    metrics: list[EpochMetrics] = []
    with open(csv_path, "w") as csv:
        csv.write(CSV_HEADER + "\n")
        for epoch in range(1, config.epochs + 1):
            t0 = time.perf_counter()
            order = rng.permutation(n_train)
            loss_sum = 0.0
            hit_sum = 0.0
            for start in range(0, n_train, config.batch):
                idx = order[start:start + config.batch]
                loss, acc, grads = gradients.loss_and_gradient(
                    model, train_ds.images[idx], train_ds.labels[idx]
                )
                if not np.isfinite(loss):
                    raise RuntimeError(
                        f"non-finite loss at epoch {epoch}, batch {start // config.batch}"
                    )
                adam_step(tensors, grads, adam)
                loss_sum += loss * len(idx)
                hit_sum += acc * len(idx)
            test_loss, test_acc, _ = batch_eval(model, test_ds.images, test_ds.labels)
            elapsed = time.perf_counter() - t0
            row = EpochMetrics(epoch, loss_sum / n_train, hit_sum / n_train,
                               test_loss, test_acc,
                               0.0 if config.deterministic else elapsed)
            metrics.append(row)
            csv.write(row.csv_row() + "\n")
            csv.flush()
            log(f"epoch {epoch:3d}  train {row.train_loss:.4f}/{row.train_acc:.3f}  "
                f"test {row.test_loss:.4f}/{row.test_acc:.3f}  ({elapsed:.1f}s)")
    save_model(model, model_path)
    return TrainResult(metrics, model, model_path, csv_path)


# -- evaluation ---------------------------------------------------------------

def evaluate_model(model: Model, ds) -> tuple[float, np.ndarray]:
    """Arg-max accuracy and the confusion matrix (rows = true class)."""
    k = model.num_classes
    confusion = np.zeros((k, k), dtype=np.int64)
    _, _, probs = batch_eval(model, ds.images, ds.labels)
    predictions = np.argmax(probs, axis=1)
    for true, pred in zip(ds.labels, predictions):
        confusion[true, pred] += 1
    accuracy = float(np.trace(confusion)) / max(len(ds), 1)
    return accuracy, confusion


def evaluate(model_path, config: RunConfig) -> tuple[float, np.ndarray]:
    model = load_model(model_path)
    engine.set_threads(config.threads)
    _, test_ds = resolve_dataset(config)
    return evaluate_model(model, test_ds)


# -- resources ----------------------------------------------------------------

def report_resources(config: RunConfig) -> dict:
    cfg = config.conv_config()
    channels = DATASET_CHANNELS[config.dataset]
    width = qconv.qubit_width(cfg)
    if cfg.method in ("wev", "control"):
        # one circuit per channel; depth/gates reported for a single run
        mc = qconv.build_channel_circuit(cfg, 0)
        runs_per_window = channels
    else:
        mc = qconv.build_method_circuit(cfg, channels)
        runs_per_window = 1
    assert mc.num_qubits == width
    return {
        "method": cfg.method,
        "ansatz": cfg.ansatz,
        "channels": channels,
        "circuit_width": width,
        "circuit_depth": circuit_depth(mc.gates),
        "gate_count": len(mc.gates),
        "parameter_count": len(qconv.method_param_names(cfg, channels)),
        "runs_per_window": runs_per_window,
    }


# -- gradient checking ---------------------------------------------------------

def gradcheck(config: RunConfig, batch_size: int = 4, h: float = 1e-4,
              head_sample: int = 64, flip_param: str | None = None,
              sweep=None, log=print) -> dict:
    """Adjoint-vs-finite-difference comparison on a small real batch.

    All quantum parameters are checked; head weights are spot-checked on a
    deterministic evenly-spaced subsample (``head_sample`` scalars per
    tensor). ``flip_param`` negates one analytic partial first (fault
    injection for the test suite). Returns a report dict with the worst
    relative error and pass verdict at the 1e-4 threshold.
    """
    config.validate()
    engine.set_threads(config.threads)
    train_ds, _ = resolve_dataset(config)
    model = build_run_model(config, train_ds)
    images = train_ds.images[:batch_size]
    labels = train_ds.labels[:batch_size]

    _, _, analytic = gradients.loss_and_gradient(model, images, labels)
    if flip_param is not None:
        idx = list(model.qparam_names).index(flip_param)
        analytic["qparams"][idx] *= -1.0

    def compare(step):
        fd = gradients.finite_diff_gradient(model, images, labels, h=step,
                                            tensors=["qparams"])
        worst, rows = gradients.compare_gradients(model, analytic, fd)
        # spot-check the head on an evenly spaced subsample
        params = model.param_tensors()
        for name in ("head.w1", "head.b1", "head.w2", "head.b2"):
            arr = params[name]
            flat = arr.reshape(-1)
            take = np.linspace(0, flat.size - 1, min(head_sample, flat.size)).astype(int)
            a_flat = analytic[name].reshape(-1)
            for i in sorted(set(take)):
                keep = flat[i]
                flat[i] = keep + step
                up = gradients.batch_loss(model, images, labels)
                flat[i] = keep - step
                down = gradients.batch_loss(model, images, labels)
                flat[i] = keep
                fd_val = (up - down) / (2 * step)
                err = gradients.relative_error(float(a_flat[i]), fd_val)
                rows.append((err, f"{name}[{i}]", float(a_flat[i]), fd_val))
                worst = max(worst, err)
        rows.sort(reverse=True)
        return worst, rows

    report = {"h": h, "threshold": 1e-4}
    if sweep:
        report["sweep"] = {}
        for step in sweep:
            worst, _ = compare(step)
            report["sweep"][step] = worst
            log(f"h={step:g}: worst relative error {worst:.3e}")
        h = min(sweep, key=lambda s: report["sweep"][s])
    worst, rows = compare(h)
    report["worst"] = worst
    report["worst_param"] = rows[0][1] if rows else None
    report["passed"] = worst < 1e-4
    log(f"gradcheck {config.method}/{config.ansatz}: worst relative error "
        f"{worst:.3e} at {report['worst_param']} -> "
        f"{'PASS' if report['passed'] else 'FAIL'}")
    for err, name, a_val, f_val in rows[:10]:
        log(f"  {name:24s} analytic {a_val: .8e}  fd {f_val: .8e}  rel {err:.3e}")
    return report
