from .dictionary import (DictionaryKind, MonomialDictionary, RBFDictionary, dict_eval, dict_grad,
                         dictionary_from_dict, make_dictionary)
from .edmd import GeneratorEDMDModel, fit_generator_edmd, predict_edmd, predict_edmd_batch
