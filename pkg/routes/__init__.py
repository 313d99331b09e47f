from .predict import predict_bp
from .reference import reference_bp

__all__ = ['predict_bp', 'reference_bp']
