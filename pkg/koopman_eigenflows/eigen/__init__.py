from .principal import MultiIndexLibrary, PrincipalEigenpairs, enumerate_library, principal_eigenpairs
from .lift import (BoxScaling, EigenfunctionLibrary, build_eigenfunction_library, fit_box_scaling, lift,
                   resolve_diffeo)
