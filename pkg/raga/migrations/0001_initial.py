# Generated by Django 5.2.10 on 2026-10-19 09:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='EvaluationRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('manifest_path', models.CharField(max_length=500)),
                ('relaxation', models.PositiveSmallIntegerField()),
                ('neighbours', models.PositiveSmallIntegerField()),
                ('metric', models.CharField(max_length=8)),
                ('features', models.CharField(default='all', max_length=300)),
                ('accuracy', models.FloatField()),
                ('recordings', models.PositiveIntegerField()),
                ('weights', models.JSONField(default=list)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at', '-id'],
            },
        ),
        migrations.CreateModel(
            name='RecordingResult',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('recording_id', models.CharField(max_length=200)),
                ('true_label', models.CharField(max_length=120)),
                ('predicted_label', models.CharField(max_length=120)),
                ('confidence', models.FloatField(default=0.0)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='results', to='raga.evaluationrun')),
            ],
            options={
                'ordering': ['run', 'recording_id'],
                'unique_together': {('run', 'recording_id')},
            },
        ),
    ]
