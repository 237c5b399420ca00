from .kefmd import (LiftedLTIModel, discretize, fit_kefmd, fit_reconstruction, predict_batch,
                    predict_derivative, predict_trajectory)
