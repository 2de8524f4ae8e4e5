"""Hyper-parameter configuration, readable from flat ``key = value`` text."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    # embedding dims
    word_dim: int = 300
    pos_dim: int = 100
    anon_dim: int = 50
    index_dim: int = 50
    char_dim: int = 32
    char_filters: int = 100
    char_ngram: int = 3
    contextual_dim: int = 1024
    contextual_pooling: str = "average"
    # encoder / decoder
    enc_hidden: int = 512          # per direction
    enc_layers: int = 2
    dec_hidden: int = 1024
    dec_layers: int = 2
    attn_dim: int = 0              # 0 means decoder hidden size
    # biaffine classifier
    edge_hidden: int = 256
    label_hidden: int = 128
    # vocabulary caps (including reserved symbols)
    enc_vocab: int = 18000
    dec_vocab: int = 12200
    max_index: int = 64
    # optimization
    epochs: int = 120
    batch_size: int = 64
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    max_grad_norm: float = 5.0
    coverage_weight: float = 1.0
    dropout: float = 0.33
    patience: int = 20
    seed: int = 1
    # decoding
    beam_size: int = 5
    decode_max_len: int = 0        # 0 means 3 * sentence length + 10
    # model switches
    source_copy: bool = True
    target_copy: bool = True
    use_contextual: bool = False

    @property
    def attention_dim(self) -> int:
        return self.attn_dim if self.attn_dim > 0 else self.dec_hidden

    @property
    def encoder_width(self) -> int:
        return 2 * self.enc_hidden

    def validate(self) -> None:
        positive = [
            "word_dim", "pos_dim", "anon_dim", "index_dim", "char_dim",
            "char_filters", "char_ngram", "enc_hidden", "enc_layers",
            "dec_hidden", "dec_layers", "edge_hidden", "label_hidden",
            "enc_vocab", "dec_vocab", "max_index", "epochs", "batch_size",
            "beam_size", "patience",
        ]
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{_KEY_OF[name]} must be positive")
        if self.lr < 0 or self.max_grad_norm <= 0:
            raise ConfigError("optimizer.learning_rate must be >= 0 and optimizer.max_grad_norm > 0")
        if self.coverage_weight < 0:
            raise ConfigError("train.coverage_weight must be >= 0")
        if not (0.0 <= self.dropout < 1.0):
            raise ConfigError("train.dropout must be in [0, 1)")
        if self.dec_hidden != 2 * self.enc_hidden:
            raise ConfigError(
                "decoder.hidden_size must equal 2 * encoder.hidden_size "
                "(the decoder state is initialized from both encoder directions)")
        if self.contextual_pooling not in ("average", "max"):
            raise ConfigError("contextual.pooling must be 'average' or 'max'")


# file key -> dataclass attribute
CONFIG_KEYS = {
    "embed.word_dim": "word_dim",
    "embed.pos_dim": "pos_dim",
    "embed.anon_dim": "anon_dim",
    "embed.index_dim": "index_dim",
    "embed.char_dim": "char_dim",
    "charcnn.num_filters": "char_filters",
    "charcnn.ngram_size": "char_ngram",
    "contextual.dim": "contextual_dim",
    "contextual.pooling": "contextual_pooling",
    "encoder.hidden_size": "enc_hidden",
    "encoder.num_layers": "enc_layers",
    "decoder.hidden_size": "dec_hidden",
    "decoder.num_layers": "dec_layers",
    "attention.hidden_size": "attn_dim",
    "biaffine.edge_hidden_size": "edge_hidden",
    "biaffine.label_hidden_size": "label_hidden",
    "vocab.encoder_size": "enc_vocab",
    "vocab.decoder_size": "dec_vocab",
    "vocab.max_index": "max_index",
    "train.epochs": "epochs",
    "train.batch_size": "batch_size",
    "optimizer.learning_rate": "lr",
    "optimizer.beta1": "beta1",
    "optimizer.beta2": "beta2",
    "optimizer.epsilon": "adam_eps",
    "optimizer.max_grad_norm": "max_grad_norm",
    "train.coverage_weight": "coverage_weight",
    "train.dropout": "dropout",
    "train.patience": "patience",
    "train.seed": "seed",
    "decode.beam_size": "beam_size",
    "decode.max_len": "decode_max_len",
    "model.source_copy": "source_copy",
    "model.target_copy": "target_copy",
    "model.use_contextual": "use_contextual",
}
_KEY_OF = {attr: key for key, attr in CONFIG_KEYS.items()}
_TYPE_OF = {f.name: f.type for f in fields(Config)}


def _parse_value(key: str, attr: str, raw: str):
    kind = _TYPE_OF[attr]
    raw = raw.strip()
    if kind == "bool":
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind}") from None
    return raw


def parse_config(text: str, base: Config | None = None) -> Config:
    cfg = base if base is not None else Config()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        setattr(cfg, CONFIG_KEYS[key], _parse_value(key, CONFIG_KEYS[key], raw))
    cfg.validate()
    return cfg


def load_config(path) -> Config:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def render_config(cfg: Config) -> str:
    """Canonical text form; parse_config(render_config(c)) == c."""
    lines = []
    for key in sorted(CONFIG_KEYS):
        value = getattr(cfg, CONFIG_KEYS[key])
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
