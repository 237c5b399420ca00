from .dense import DenseNet, elu, elu_prime, net_forward, net_input_jacobian
from .params import ParamVector, assign_params, flatten_params, loss_gradient
from .optim import AdamState, adam_step
