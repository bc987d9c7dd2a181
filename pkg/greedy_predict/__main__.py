from greedy_predict.cli import app

app(prog_name="greedyctl")
