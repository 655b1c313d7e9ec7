"""Training loop, checkpointing, ablation runner, and prediction."""

import dataclasses
import json
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from . import data as data_mod
from .config import RunConfig, VARIANTS, resolve_variant
from .errors import InputError, TrainingDiverged
from .losses import total_loss
from .metrics import evaluate_pair
from .model import CamoGraphNet, build_model, count_parameters


def to_tensors(sample):
    image = torch.from_numpy(np.ascontiguousarray(sample.image)) \
        .permute(2, 0, 1).float()
    depth = torch.from_numpy(np.ascontiguousarray(sample.depth)) \
        .unsqueeze(0).float()
    mask = torch.from_numpy(np.ascontiguousarray(sample.mask)) \
        .unsqueeze(0).float()
    return image, depth, mask


def _stack_batch(samples, augment_rng=None):
    images, depths, masks = [], [], []
    for s in samples:
        if augment_rng is not None:
            s = data_mod.augment(s, int(augment_rng.integers(2 ** 31)))
        image, depth, mask = to_tensors(s)
        images.append(image)
        depths.append(depth)
        masks.append(mask)
    return torch.stack(images), torch.stack(depths), torch.stack(masks)


def train(cfg: RunConfig, samples, log=None):
    """Run the optimization loop; returns (model, per-step history).

    Deterministic for a fixed cfg.seed: parameter init, shuffling, and
    augmentation draws all derive from it. A non-finite loss aborts with
    the name of the first bad term.
    """
    if not samples:
        raise InputError("training needs a non-empty dataset")
    torch.manual_seed(cfg.seed)
    model = build_model(cfg)
    params = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.Adam(params, lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)

    history = []
    step = 0
    done = False
    for epoch in range(cfg.epochs):
        if done:
            break
        order = rng.permutation(len(samples))
        for start in range(0, len(order), cfg.batch):
            chunk = [samples[i] for i in order[start:start + cfg.batch]]
            images, depths, masks = _stack_batch(
                chunk, augment_rng=rng if cfg.augment else None)

            p_m, sides = model(images, depths if model.arch.use_depth else None)
            total, terms = total_loss(p_m.probs, [s.probs for s in sides],
                                      masks, weighted=cfg.loss_mode == "weighted")
            step += 1
            for name, value in terms.items():
                if not torch.isfinite(value):
                    raise TrainingDiverged(name, step)

            optimizer.zero_grad()
            total.backward()
            optimizer.step()

            entry = {"step": step, "epoch": epoch,
                     "loss": float(total.detach())}
            entry.update({name: float(v.detach()) for name, v in terms.items()})
            history.append(entry)
            if log is not None and (step == 1 or step % 25 == 0):
                log(f"step {step}: loss {entry['loss']:.4f}")
            if cfg.max_steps and step >= cfg.max_steps:
                done = True
                break
    return model, history


def save_checkpoint(model: CamoGraphNet, path):
    payload = {
        "state": model.state_dict(),
        "cfg": dataclasses.asdict(model.cfg),
    }
    torch.save(payload, path)


def load_checkpoint(path) -> CamoGraphNet:
    payload = torch.load(path, map_location="cpu")
    cfg = RunConfig(**payload["cfg"])
    model = build_model(cfg)
    model.load_state_dict(payload["state"])
    model.eval()
    return model


@torch.no_grad()
def predict_sample(model: CamoGraphNet, sample):
    """Main-prediction probabilities for one sample, as an H x W array."""
    model.eval()
    image, depth, _ = to_tensors(sample)
    p_m, _ = model(image.unsqueeze(0),
                   depth.unsqueeze(0) if model.arch.use_depth else None)
    return p_m.probs[0, 0].numpy().astype(np.float64)


def evaluate_model(model: CamoGraphNet, samples):
    """Mean of the four metrics over samples."""
    rows = [evaluate_pair(np.clip(predict_sample(model, s), 0.0, 1.0), s.mask)
            for s in samples]
    return {key: float(np.mean([r[key] for r in rows]))
            for key in ("mae", "wfm", "em", "sm")}


def ablate(variant_names, base_cfg: RunConfig, samples, log=None):
    """Train and evaluate each variant; returns rows in input order.

    All names are resolved up front so an unknown variant fails before
    any training starts. The last fifth of the dataset (manifest order)
    is held out for evaluation when there are enough samples.
    """
    slugs = [resolve_variant(name) for name in variant_names]
    n_eval = max(1, len(samples) // 5) if len(samples) >= 5 else 0
    train_set = samples[:-n_eval] if n_eval else samples
    eval_set = samples[-n_eval:] if n_eval else samples

    rows = []
    for slug in slugs:
        cfg = dataclasses.replace(base_cfg, variant=slug)
        if log is not None:
            log(f"training variant {slug}")
        model, _ = train(cfg, train_set, log=log)
        scores = evaluate_model(model, eval_set)
        rows.append({"variant": slug, "label": VARIANTS[slug][0], **scores})
    return rows


def format_ablation_table(rows) -> str:
    width = max(len("variant"), *(len(r["label"]) for r in rows))
    header = f"{'variant':<{width}}  {'S_m':>7}  {'F_w':>7}  {'E_m':>7}  {'MAE':>7}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(f"{r['label']:<{width}}  {r['sm']:>7.4f}  {r['wfm']:>7.4f}"
                     f"  {r['em']:>7.4f}  {r['mae']:>7.4f}")
    return "\n".join(lines)


def _load_image_file(path):
    arr = np.asarray(Image.open(path).convert("RGB"), dtype=np.float64) / 255.0
    return arr


def _load_depth_file(path):
    img = Image.open(path)
    arr = np.asarray(img, dtype=np.float64)
    if img.mode in ("I", "I;16"):
        return arr / 65535.0
    return arr / 255.0


def predict_files(ckpt_path, image_path, depth_path, out_path, sides=False):
    """Run one image through a checkpoint and write the mask PNG(s)."""
    model = load_checkpoint(ckpt_path)
    image = _load_image_file(image_path)
    if model.arch.use_depth:
        if depth_path is None:
            raise InputError("this checkpoint requires a depth map")
        depth = _load_depth_file(depth_path)
    else:
        depth = np.zeros(image.shape[:2])
    sample = data_mod.Sample(image=image, depth=depth,
                             mask=np.zeros(image.shape[:2]), id="input", seed=0)

    image_t, depth_t, _ = to_tensors(sample)
    with torch.no_grad():
        p_m, side_preds = model(
            image_t.unsqueeze(0),
            depth_t.unsqueeze(0) if model.arch.use_depth else None)

    out_path = Path(out_path)
    Image.fromarray(_to_png(p_m.probs)).save(out_path)
    if sides:
        for i, pred in enumerate(side_preds, start=2):
            side_file = out_path.with_name(f"{out_path.stem}_p{i}.png")
            Image.fromarray(_to_png(pred.probs)).save(side_file)
    return out_path


def _to_png(probs):
    return np.round(probs[0, 0].numpy() * 255.0).astype(np.uint8)


def run_training(cfg: RunConfig, data_dir, out_dir, log=print):
    """CLI-facing train: read dataset, fit, save artifacts."""
    samples = data_mod.read_dataset(data_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model, history = train(cfg, samples, log=log)
    log(f"parameters: {count_parameters(model)}")
    save_checkpoint(model, out_dir / "checkpoint.pt")
    (out_dir / "history.json").write_text(json.dumps(history, indent=2) + "\n")
    from .config import write_config
    write_config(model.cfg, out_dir / "config.txt")
    return model, history
