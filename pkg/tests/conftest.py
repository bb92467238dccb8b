import numpy as np

from qmconv import datasets


def make_tiny_dataset_files(data_dir, name="noisy-colors", n_classes=3,
                            per_class_train=8, per_class_test=4,
                            shape=(4, 4, 3), seed=0):
    """Small separable dataset written in the container format, so trainer
    tests resolve real files instead of generating the full-size recipes."""
    rng = np.random.default_rng(seed)
    names = [f"class{i}" for i in range(n_classes)]

    def build(per_class, split):
        images, labels = [], []
        for c in range(n_classes):
            base = (c + 1) / (n_classes + 1)
            for _ in range(per_class):
                img = np.clip(base + 0.1 * rng.standard_normal(shape), 0, 1)
                images.append(img.astype(np.float32))
                labels.append(c)
        return datasets.LabeledDataset(
            np.stack(images), np.asarray(labels, dtype=np.int64), names, split
        )

    data_dir.mkdir(parents=True, exist_ok=True)
    datasets.save_dataset(build(per_class_train, "train"), data_dir / f"{name}.train.qmc")
    datasets.save_dataset(build(per_class_test, "test"), data_dir / f"{name}.test.qmc")
    return data_dir
