import { EvaluationClient } from './api.js';
import { ExplorerApp } from './app.js';

const params = new URLSearchParams(window.location.search);
const base = params.get('api') ?? 'http://127.0.0.1:8080';

const root = document.getElementById('app');
if (!root) throw new Error('missing #app element');

const app = new ExplorerApp(new EvaluationClient(base), root, document);
void app.start().catch((error) => {
  root.textContent = `failed to reach evaluation service at ${base}: ${error}`;
});
