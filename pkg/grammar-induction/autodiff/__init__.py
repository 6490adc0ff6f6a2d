from .engine import Tensor, backward, no_grad, set_default_dtype
from .layers import AttentionBlock, MlpBlock, Module, Parameter, attend, frozen, mlp_forward
from .optim import Adam, adam_step
