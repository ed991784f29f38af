"""Model hyperparameters for the ViT encoder."""

from dataclasses import dataclass

N_CHANNELS = 3


@dataclass(frozen=True)
class ModelConfig:
    """ViT-Base by default: 12 layers of width 768 with 12 heads over
    16-pixel patches of a 224x224 RGB image. num_classes adds an optional
    classification head; embeddings never use it."""
    image_size: int = 224
    patch_size: int = 16
    hidden_dim: int = 768
    num_layers: int = 12
    num_heads: int = 12
    mlp_dim: int = 3072
    num_classes: int | None = None

    def __post_init__(self):
        for field in ("image_size", "patch_size", "hidden_dim", "num_layers",
                      "num_heads", "mlp_dim"):
            if getattr(self, field) < 1:
                raise ValueError(f"{field} must be >= 1, got {getattr(self, field)}")
        if self.image_size % self.patch_size != 0:
            raise ValueError(
                f"image_size {self.image_size} not divisible by "
                f"patch_size {self.patch_size}"
            )
        if self.hidden_dim % self.num_heads != 0:
            raise ValueError(
                f"hidden_dim {self.hidden_dim} not divisible by "
                f"num_heads {self.num_heads}"
            )
        if self.num_classes is not None and self.num_classes < 1:
            raise ValueError(f"num_classes must be >= 1, got {self.num_classes}")

    @property
    def n_patches(self) -> int:
        side = self.image_size // self.patch_size
        return side * side

    @property
    def patch_dim(self) -> int:
        return self.patch_size * self.patch_size * N_CHANNELS

    @property
    def head_dim(self) -> int:
        return self.hidden_dim // self.num_heads

    @classmethod
    def toy(cls) -> "ModelConfig":
        """Small config for fast exact testing: 32px image, 4 patches, width 8."""
        return cls(image_size=32, patch_size=16, hidden_dim=8, num_layers=1,
                   num_heads=2, mlp_dim=16)
