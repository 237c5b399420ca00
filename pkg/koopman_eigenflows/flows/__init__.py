from .coupling import (CouplingLayer, FlowModel, alternating_masks, flow_forward, flow_inverse,
                       flow_jacobian, layer_forward, layer_inverse)
from .identity import IdentityMap
