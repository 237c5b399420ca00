# Initialize the koopman_eigenflows package
__version__ = "0.1.0"
