import sys
import os
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from flask import Flask, jsonify
from config.config import Config
from routes import predict_bp, reference_bp


def create_app(config_class=Config):
    app = Flask(__name__)
    app.config.from_object(config_class)

    app.register_blueprint(predict_bp, url_prefix='/api')
    app.register_blueprint(reference_bp, url_prefix='/api')

    @app.errorhandler(404)
    def not_found(e):
        return jsonify({'status': 'error', 'kind': 'not_found', 'message': str(e)}), 404

    return app
